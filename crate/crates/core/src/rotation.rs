//! Rotation defense: rotate an image through a grid of angles, classify each
//! rotation, and pick the angle where the true class is most confident.
//!
//! Coordinates are Cartesian about the image center `c = 13.5`: a pixel at
//! `(row, col)` sits at `u = col - c`, `v = c - row` (v points up), so a
//! positive angle turns the picture counterclockwise on screen. Output pixels
//! are produced by inverse mapping with bilinear sampling; samples that fall
//! outside the frame read the fill value.

use crate::mnist::{Image, IMAGE_SIDE};
use crate::model::Model;
use crate::tensor::ProbVector;
use crate::{Error, Result, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationConfig {
    pub angle_min: i32,
    pub angle_max: i32,
    pub angle_step: u32,
    pub interpolation: Interpolation,
    pub fill_value: f64,
}

impl Default for RotationConfig {
    fn default() -> Self {
        RotationConfig {
            angle_min: 0,
            angle_max: 90,
            angle_step: 1,
            interpolation: Interpolation::Bilinear,
            fill_value: 0.0,
        }
    }
}

impl RotationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0 <= self.angle_min && self.angle_min <= self.angle_max && self.angle_max <= 359) {
            return Err(Error::validation(format!(
                "angles must satisfy 0 <= min <= max <= 359, got {}..{}",
                self.angle_min, self.angle_max
            )));
        }
        if self.angle_step == 0 {
            return Err(Error::validation("angle_step must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.fill_value) {
            return Err(Error::validation(format!(
                "fill_value {} is outside [0, 1]",
                self.fill_value
            )));
        }
        Ok(())
    }

    /// Swept angles, `angle_min` up to and including `angle_max` when the step lands on it.
    pub fn angles(&self) -> Vec<i32> {
        (self.angle_min..=self.angle_max)
            .step_by(self.angle_step as usize)
            .collect()
    }
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90.
fn sin_cos_deg(degrees: f64) -> (f64, f64) {
    let r = degrees.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        r.to_radians().sin_cos()
    }
}

/// Counterclockwise rotation about the center with zero fill.
pub fn rotate(image: &Image, degrees: f64) -> Image {
    rotate_with(image, degrees, 0.0, Interpolation::Bilinear)
}

pub fn rotate_with(image: &Image, degrees: f64, fill: f64, interpolation: Interpolation) -> Image {
    let Interpolation::Bilinear = interpolation;
    let n = IMAGE_SIDE;
    let c = (n as f64 - 1.0) / 2.0;
    let (sin, cos) = sin_cos_deg(degrees);
    let src = image.pixels();
    let sample = |row: isize, col: isize| -> f64 {
        if row < 0 || col < 0 || row >= n as isize || col >= n as isize {
            fill
        } else {
            src[row as usize * n + col as usize]
        }
    };

    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let u_out = col as f64 - c;
            let v_out = c - row as f64;
            // inverse rotation by -alpha
            let u = cos * u_out + sin * v_out;
            let v = -sin * u_out + cos * v_out;
            let sx = c + u;
            let sy = c - v;

            let x0 = sx.floor();
            let y0 = sy.floor();
            let fx = sx - x0;
            let fy = sy - y0;
            let (x0, y0) = (x0 as isize, y0 as isize);
            let value = sample(y0, x0) * (1.0 - fx) * (1.0 - fy)
                + sample(y0, x0 + 1) * fx * (1.0 - fy)
                + sample(y0 + 1, x0) * (1.0 - fx) * fy
                + sample(y0 + 1, x0 + 1) * fx * fy;
            out.push(value.clamp(0.0, 1.0));
        }
    }
    Image::new(out).expect("bilinear samples of [0, 1] values stay in range")
}

/// Per-angle class probabilities for one image and the best recovery angle.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub true_class: usize,
    pub angles: Vec<i32>,
    pub curves: Vec<ProbVector>,
    pub best_angle: i32,
    /// True-class probability at `best_angle`.
    pub best_confidence: f64,
    /// Whether the prediction at `best_angle` is the true class.
    pub recovered: bool,
}

impl SweepRecord {
    pub fn curve_at(&self, angle: i32) -> Option<&ProbVector> {
        let i = self.angles.iter().position(|&a| a == angle)?;
        self.curves.get(i)
    }

    /// True-class probability at every swept angle.
    pub fn true_class_curve(&self) -> Vec<f64> {
        self.curves.iter().map(|p| p.get(self.true_class)).collect()
    }
}

/// Classifies every rotation in the configured grid. The best angle maximizes
/// the true-class probability; ties go to the smallest angle.
pub fn sweep(model: &Model, image: &Image, true_class: usize, config: &RotationConfig) -> Result<SweepRecord> {
    config.validate()?;
    if true_class >= NUM_CLASSES {
        return Err(Error::validation(format!("true class {true_class} is not a digit")));
    }
    let angles = config.angles();
    let curves = crate::par::map_slice(&angles, |&a| {
        let rotated = rotate_with(image, f64::from(a), config.fill_value, config.interpolation);
        model.predict_proba(&rotated)
    })?;

    let mut best = 0;
    for (i, p) in curves.iter().enumerate().skip(1) {
        if p.get(true_class) > curves[best].get(true_class) {
            best = i;
        }
    }
    Ok(SweepRecord {
        true_class,
        best_angle: angles[best],
        best_confidence: curves[best].get(true_class),
        recovered: curves[best].argmax() == true_class,
        angles,
        curves,
    })
}

/// Runs the sweep and reports whether the true class was recovered.
pub fn defend(
    model: &Model,
    adversarial: &Image,
    true_class: usize,
    config: &RotationConfig,
) -> Result<(bool, SweepRecord)> {
    let record = sweep(model, adversarial, true_class, config)?;
    Ok((record.recovered, record))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(row: usize, col: usize) -> Image {
        let mut p = vec![0.0; 784];
        p[row * 28 + col] = 1.0;
        Image::new(p).unwrap()
    }

    fn lit(img: &Image) -> Vec<(usize, usize, f64)> {
        (0..784)
            .filter(|&i| img.pixels()[i] > 1e-12)
            .map(|i| (i / 28, i % 28, img.pixels()[i]))
            .collect()
    }

    #[test]
    fn zero_angle_is_identity() {
        let img = Image::new((0..784).map(|i| (i % 97) as f64 / 96.0).collect()).unwrap();
        assert_eq!(rotate(&img, 0.0), img);
        assert_eq!(rotate(&img, 360.0), img);
    }

    #[test]
    fn quarter_turn_moves_delta_counterclockwise() {
        // u = 20, v = 14  ->  row 13, col 20
        let img = delta(13, 20);
        let c = 13.5;
        let (u, v) = (20.0 - c, 14.0 - c);
        let (u_rot, v_rot): (f64, f64) = (-v, u);
        let (col, row) = ((u_rot + c) as usize, (c - v_rot) as usize);
        let out = rotate(&img, 90.0);
        assert_eq!(lit(&out), vec![(row, col, 1.0)]);
        assert_eq!((row, col), (7, 13));
    }

    #[test]
    fn four_quarter_turns_are_exact() {
        let img = Image::new((0..784).map(|i| ((i * 31) % 101) as f64 / 100.0).collect()).unwrap();
        let mut r = img.clone();
        for _ in 0..4 {
            r = rotate(&r, 90.0);
        }
        assert_eq!(r, img);
    }

    #[test]
    fn output_stays_in_box() {
        let img = Image::new(vec![1.0; 784]).unwrap();
        for a in [-45.0, 13.7, 33.0, 271.2] {
            assert!(rotate(&img, a).pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn angle_grid() {
        assert_eq!(RotationConfig::default().angles().len(), 91);
        let c = RotationConfig {
            angle_min: 10,
            angle_max: 20,
            angle_step: 4,
            ..RotationConfig::default()
        };
        assert_eq!(c.angles(), vec![10, 14, 18]);
        assert!(RotationConfig {
            angle_max: 400,
            ..RotationConfig::default()
        }
        .validate()
        .is_err());
        assert!(RotationConfig {
            angle_min: 50,
            angle_max: 10,
            ..RotationConfig::default()
        }
        .validate()
        .is_err());
        assert!(RotationConfig {
            angle_step: 0,
            ..RotationConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn blank_image_ties_to_first_angle() {
        let model = Model::new(3);
        let cfg = RotationConfig {
            angle_min: 5,
            ..RotationConfig::default()
        };
        let rec = sweep(&model, &Image::blank(), 4, &cfg).unwrap();
        assert_eq!(rec.best_angle, 5);
        assert_eq!(rec.angles.len(), rec.curves.len());
        assert_eq!(rec.best_confidence, rec.curve_at(5).unwrap().get(4));
    }

    #[test]
    fn sweep_record_consistency() {
        let model = Model::new(8);
        let img = Image::new((0..784).map(|i| if (i / 28) % 5 == 0 { 0.9 } else { 0.0 }).collect()).unwrap();
        let (recovered, rec) = defend(&model, &img, 2, &RotationConfig::default()).unwrap();
        assert_eq!(recovered, rec.recovered);
        let curve = rec.true_class_curve();
        let max = curve.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(rec.best_confidence, max);
        let first = curve.iter().position(|&v| v == max).unwrap();
        assert_eq!(rec.best_angle, rec.angles[first]);
        assert_eq!(rec.recovered, rec.curve_at(rec.best_angle).unwrap().argmax() == 2);
    }
}
