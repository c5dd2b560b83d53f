use rotguard::mnist::{encode_idx_images, encode_idx_labels, RawGrid};
use rotguard::model::Model;
use rotguard_web::{rotate, Demo};

fn stroke() -> Vec<f64> {
    (0..784)
        .map(|i| {
            if (i % 28) == 14 && (4..24).contains(&(i / 28)) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

#[test]
fn classify_attack_and_sweep() {
    let model = Model::new(4);
    let demo = Demo::new(&model.to_checkpoint_bytes()).unwrap();
    let probs = demo.classify(&stroke()).unwrap();
    assert_eq!(probs.len(), 10);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let out = demo.attack(&stroke(), 1, 8, 0.01, 5).unwrap();
    assert_eq!(out.target_trace().len(), 5);
    assert_eq!(out.adversarial().len(), 784);
    assert!(out.linf() <= 0.05 + 1e-12);

    let s = demo.sweep(&stroke(), 1, 0, 90, 10).unwrap();
    assert_eq!(s.angles(), vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90]);
    let curve = s.true_curve();
    assert_eq!(curve.len(), 10);
    assert!(curve.iter().all(|&p| p <= s.best_confidence()));
}

#[test]
fn quarter_turn_of_a_vertical_stroke_is_horizontal() {
    let r = rotate(&stroke(), 90.0).unwrap();
    let row13: f64 = r[13 * 28..14 * 28].iter().sum();
    assert_eq!(row13, 20.0);
}

#[test]
fn idx_images_are_browsable() {
    let model = Model::new(4);
    let mut demo = Demo::new(&model.to_checkpoint_bytes()).unwrap();
    assert_eq!(demo.image_count(), 0);
    let grids: Vec<RawGrid> = (0..3u8)
        .map(|k| RawGrid {
            rows: 28,
            cols: 28,
            bytes: vec![k * 100; 784],
        })
        .collect();
    let n = demo
        .load_images(&encode_idx_images(&grids).unwrap(), &encode_idx_labels(&[3, 1, 4]))
        .unwrap();
    assert_eq!(n, 3);
    assert_eq!(demo.label(2), Some(4));
    assert_eq!(demo.image(1).unwrap()[0], 100.0 / 255.0);
    assert!(demo.image(3).is_none());
}
