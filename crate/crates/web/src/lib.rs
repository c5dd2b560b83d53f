//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Images cross the boundary as `Float64Array`s of 784 row-major pixels in `[0, 1]`.

use rotguard::attack::{craft_from, AttackConfig, AttackResult};
use rotguard::mnist::{Image, LabeledDataset, Split};
use rotguard::model::Model;
use rotguard::rotation::{self, RotationConfig, SweepRecord};
use wasm_bindgen::prelude::*;

fn js(e: rotguard::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn image(pixels: &[f64]) -> Result<Image, JsError> {
    Image::clamped(pixels.to_vec()).map_err(js)
}

#[wasm_bindgen]
pub struct Demo {
    model: Model,
    test: Option<LabeledDataset>,
}

#[wasm_bindgen]
impl Demo {
    /// Builds a demo around the bytes of a `rotguard train` checkpoint.
    #[wasm_bindgen(constructor)]
    pub fn new(checkpoint: &[u8]) -> Result<Demo, JsError> {
        Ok(Demo {
            model: Model::from_checkpoint_bytes(checkpoint).map_err(js)?,
            test: None,
        })
    }

    /// Loads a pair of IDX files and returns the number of samples.
    pub fn load_images(&mut self, images: &[u8], labels: &[u8]) -> Result<usize, JsError> {
        let data = LabeledDataset::from_idx(images, labels, Split::Test).map_err(js)?;
        let n = data.len();
        self.test = Some(data);
        Ok(n)
    }

    pub fn image_count(&self) -> usize {
        self.test.as_ref().map_or(0, LabeledDataset::len)
    }

    pub fn image(&self, index: usize) -> Option<Vec<f64>> {
        let (img, _) = self.test.as_ref()?.get(index)?;
        Some(img.pixels().to_vec())
    }

    pub fn label(&self, index: usize) -> Option<u8> {
        Some(self.test.as_ref()?.get(index)?.1)
    }

    /// Class probabilities for one image.
    pub fn classify(&self, pixels: &[f64]) -> Result<Vec<f64>, JsError> {
        let probs = self.model.predict_proba(&image(pixels)?).map_err(js)?;
        Ok(probs.probs().to_vec())
    }

    pub fn attack(
        &self,
        pixels: &[f64],
        true_class: usize,
        target_class: usize,
        epsilon_step: f64,
        iterations: usize,
    ) -> Result<AttackOutput, JsError> {
        let config = AttackConfig {
            epsilon_step,
            iterations,
            target_class,
        };
        craft_from(&self.model, &image(pixels)?, true_class, &config)
            .map(AttackOutput)
            .map_err(js)
    }

    pub fn sweep(
        &self,
        pixels: &[f64],
        true_class: usize,
        angle_min: i32,
        angle_max: i32,
        angle_step: u32,
    ) -> Result<SweepOutput, JsError> {
        let config = RotationConfig {
            angle_min,
            angle_max,
            angle_step,
            ..RotationConfig::default()
        };
        rotation::sweep(&self.model, &image(pixels)?, true_class, &config)
            .map(SweepOutput)
            .map_err(js)
    }
}

/// Counterclockwise rotation with zero fill.
#[wasm_bindgen]
pub fn rotate(pixels: &[f64], degrees: f64) -> Result<Vec<f64>, JsError> {
    Ok(rotation::rotate(&image(pixels)?, degrees).into_pixels())
}

#[wasm_bindgen]
pub struct AttackOutput(AttackResult);

#[wasm_bindgen]
impl AttackOutput {
    pub fn adversarial(&self) -> Vec<f64> {
        self.0.adversarial.pixels().to_vec()
    }

    pub fn target_trace(&self) -> Vec<f64> {
        self.0.trace.iter().map(|t| t.target_confidence).collect()
    }

    pub fn true_trace(&self) -> Vec<f64> {
        self.0.trace.iter().map(|t| t.true_confidence).collect()
    }

    #[wasm_bindgen(getter)]
    pub fn success(&self) -> bool {
        self.0.success
    }

    #[wasm_bindgen(getter)]
    pub fn l0(&self) -> usize {
        self.0.metrics.l0
    }

    #[wasm_bindgen(getter)]
    pub fn l2(&self) -> f64 {
        self.0.metrics.l2
    }

    #[wasm_bindgen(getter)]
    pub fn linf(&self) -> f64 {
        self.0.metrics.linf
    }
}

#[wasm_bindgen]
pub struct SweepOutput(SweepRecord);

#[wasm_bindgen]
impl SweepOutput {
    pub fn angles(&self) -> Vec<i32> {
        self.0.angles.clone()
    }

    /// True-class probability at every angle.
    pub fn true_curve(&self) -> Vec<f64> {
        self.0.true_class_curve()
    }

    /// Probability of `class` at every angle.
    pub fn class_curve(&self, class: usize) -> Vec<f64> {
        self.0.curves.iter().map(|p| p.get(class)).collect()
    }

    #[wasm_bindgen(getter)]
    pub fn best_angle(&self) -> i32 {
        self.0.best_angle
    }

    #[wasm_bindgen(getter)]
    pub fn best_confidence(&self) -> f64 {
        self.0.best_confidence
    }

    #[wasm_bindgen(getter)]
    pub fn best_prediction(&self) -> usize {
        self.0
            .curve_at(self.0.best_angle)
            .map_or(self.0.true_class, |p| p.argmax())
    }

    #[wasm_bindgen(getter)]
    pub fn recovered(&self) -> bool {
        self.0.recovered
    }
}
