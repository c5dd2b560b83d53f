//! White-box targeted iterative FGSM.
//!
//! Each step descends the cross-entropy loss of the *target* class,
//! `x <- clip(x - eps * sign(grad_x L(x, target)), 0, 1)`, so the image drifts
//! toward the target decision while staying a valid image.

use crate::mnist::Image;
use crate::model::Model;
use crate::tensor::{lp_metrics, PerturbationMetrics};
use crate::{Error, Result, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    pub epsilon_step: f64,
    pub iterations: usize,
    pub target_class: usize,
}

impl AttackConfig {
    /// 20 steps of 0.01 toward `target_class`.
    pub fn new(target_class: usize) -> Self {
        AttackConfig {
            epsilon_step: 0.01,
            iterations: 20,
            target_class,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // A zero step is allowed; it makes the attack a no-op.
        if !(self.epsilon_step.is_finite() && self.epsilon_step >= 0.0) {
            return Err(Error::validation(format!(
                "epsilon_step must be >= 0, got {}",
                self.epsilon_step
            )));
        }
        if self.iterations == 0 {
            return Err(Error::validation("iterations must be at least 1"));
        }
        if self.target_class >= NUM_CLASSES {
            return Err(Error::validation(format!(
                "target class {} is not a digit",
                self.target_class
            )));
        }
        Ok(())
    }
}

/// Confidences observed after one attack iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub target_confidence: f64,
    pub true_confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub adversarial: Image,
    pub true_class: usize,
    pub target_class: usize,
    pub trace: Vec<TracePoint>,
    pub metrics: PerturbationMetrics,
    /// Whether the final image is classified as the target.
    pub success: bool,
}

impl AttackResult {
    pub fn final_target_confidence(&self) -> f64 {
        self.trace.last().map_or(0.0, |t| t.target_confidence)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sign of the input gradient of the target-class loss; entries in {-1, 0, 1}.
pub fn gradient_sign(model: &Model, image: &Image, target_class: usize) -> Result<Vec<f64>> {
    let grad = model.input_gradient(image, target_class)?;
    Ok(grad.data().iter().map(|&g| sign(g)).collect())
}

/// One targeted FGSM step with per-step clipping to `[0, 1]`.
pub fn fgsm_step(model: &Model, image: &Image, target_class: usize, epsilon_step: f64) -> Result<Image> {
    let signs = gradient_sign(model, image, target_class)?;
    let pixels = image
        .pixels()
        .iter()
        .zip(&signs)
        .map(|(&x, &s)| (x - epsilon_step * s).clamp(0.0, 1.0))
        .collect();
    Image::new(pixels)
}

/// Runs every configured iteration against an image whose true class is
/// `true_class`. No early stopping.
pub fn craft_from(model: &Model, image: &Image, true_class: usize, config: &AttackConfig) -> Result<AttackResult> {
    config.validate()?;
    let mut current = image.clone();
    let mut trace = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        current = fgsm_step(model, &current, config.target_class, config.epsilon_step)?;
        let probs = model.predict_proba(&current)?;
        trace.push(TracePoint {
            target_confidence: probs.get(config.target_class),
            true_confidence: probs.get(true_class),
        });
    }
    let metrics = lp_metrics(image.pixels(), current.pixels())?;
    let success = model.predict(&current)? == config.target_class;
    Ok(AttackResult {
        adversarial: current,
        true_class,
        target_class: config.target_class,
        trace,
        metrics,
        success,
    })
}

/// Targeted attack where the true class is the model's own clean prediction.
pub fn craft_targeted(model: &Model, image: &Image, config: &AttackConfig) -> Result<AttackResult> {
    config.validate()?;
    let predicted = model.predict(image)?;
    if predicted == config.target_class {
        return Err(Error::validation("image already classified as target"));
    }
    craft_from(model, image, predicted, config)
}

/// Attacks every image of one shared true class; results follow input order.
pub fn batch_attack(
    model: &Model,
    images: &[Image],
    labels: &[u8],
    config: &AttackConfig,
) -> Result<Vec<AttackResult>> {
    config.validate()?;
    if images.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let Some(&first) = labels.first() else {
        return Ok(Vec::new());
    };
    if let Some(i) = labels.iter().position(|&l| l != first) {
        return Err(Error::validation(format!(
            "mixed true classes: sample 0 is {first}, sample {i} is {}",
            labels[i]
        )));
    }
    let true_class = first as usize;
    if true_class == config.target_class {
        return Err(Error::validation("true class equals the target class"));
    }
    crate::par::map_slice(images, |img| craft_from(model, img, true_class, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new((0..784).map(|_| rng.gen_range(0.05..0.95)).collect()).unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let model = Model::new(1);
        let img = random_image(2);
        assert_eq!(fgsm_step(&model, &img, 3, 0.0).unwrap(), img);
    }

    #[test]
    fn step_moves_each_pixel_by_epsilon() {
        let model = Model::new(1);
        let img = random_image(3);
        let eps = 0.02;
        let signs = gradient_sign(&model, &img, 5).unwrap();
        assert!(signs.iter().all(|s| [-1.0, 0.0, 1.0].contains(s)));
        let next = fgsm_step(&model, &img, 5, eps).unwrap();
        for ((a, b), s) in img.pixels().iter().zip(next.pixels()).zip(&signs) {
            let d = (a - b).abs();
            if *s == 0.0 {
                assert_eq!(d, 0.0);
            } else {
                assert!((d - eps).abs() < 1e-15);
            }
        }
        assert!(lp_metrics(img.pixels(), next.pixels()).unwrap().linf <= eps + 1e-15);
    }

    #[test]
    fn clipping_keeps_box() {
        let model = Model::new(4);
        let img = Image::new(vec![1.0; 784]).unwrap();
        let next = fgsm_step(&model, &img, 2, 0.5).unwrap();
        assert!(next.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn small_step_reduces_target_loss() {
        let model = Model::new(5);
        let img = random_image(6);
        let before = model.loss(&img, 7).unwrap();
        let after = model.loss(&fgsm_step(&model, &img, 7, 1e-3).unwrap(), 7).unwrap();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn zero_epsilon_single_iteration() {
        let model = Model::new(5);
        let img = random_image(8);
        let predicted = model.predict(&img).unwrap();
        let target = (predicted + 1) % 10;
        let cfg = AttackConfig {
            epsilon_step: 0.0,
            iterations: 1,
            target_class: target,
        };
        let r = craft_targeted(&model, &img, &cfg).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.adversarial, img);
        assert!(!r.success);
    }

    #[test]
    fn already_target_is_rejected() {
        let model = Model::new(5);
        let img = random_image(9);
        let cfg = AttackConfig::new(model.predict(&img).unwrap());
        let err = craft_targeted(&model, &img, &cfg).unwrap_err();
        assert!(err.to_string().contains("already classified as target"));
    }

    #[test]
    fn budget_and_determinism() {
        let model = Model::new(5);
        let img = random_image(10);
        let target = (model.predict(&img).unwrap() + 3) % 10;
        let cfg = AttackConfig {
            iterations: 5,
            ..AttackConfig::new(target)
        };
        let a = craft_targeted(&model, &img, &cfg).unwrap();
        let b = craft_targeted(&model, &img, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace.len(), 5);
        assert!(a.metrics.linf <= 5.0 * 0.01 + 1e-12);
    }

    #[test]
    fn batch_validation() {
        let model = Model::new(5);
        let imgs = vec![random_image(1), random_image(2)];
        let cfg = AttackConfig::new(8);
        assert!(batch_attack(&model, &[], &[], &cfg).unwrap().is_empty());
        assert!(batch_attack(&model, &imgs, &[1, 2], &cfg).is_err());
        assert!(batch_attack(&model, &imgs, &[8, 8], &cfg).is_err());
        let cfg = AttackConfig { iterations: 2, ..cfg };
        let out = batch_attack(&model, &imgs, &[1, 1], &cfg).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1], craft_from(&model, &imgs[1], 1, &cfg).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(AttackConfig {
            iterations: 0,
            ..AttackConfig::new(1)
        }
        .validate()
        .is_err());
        assert!(AttackConfig::new(10).validate().is_err());
        assert!(AttackConfig {
            epsilon_step: -0.1,
            ..AttackConfig::new(1)
        }
        .validate()
        .is_err());
    }
}
